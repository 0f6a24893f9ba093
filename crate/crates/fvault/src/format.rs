//! Text formats: minutiae templates, descriptor lists, transform sidecars
//! and the `finger<I>_imp<J>.txt` dataset layout.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use fvault_core::bits::BitString;
use fvault_core::descriptor::{DescribedTemplate, Descriptor};
use fvault_core::minutiae::{Minutia, MinutiaeTemplate, RigidTransform};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("{0}")]
    Layout(String),
    #[error(transparent)]
    Core(#[from] fvault_core::Error),
}

pub type Result<T> = std::result::Result<T, FormatError>;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.to_owned(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| FormatError::Io {
        path: path.to_owned(),
        source,
    })
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Parse {
        path: path.to_owned(),
        line,
        msg: msg.into(),
    }
}

/// Non-empty, non-comment lines with their 1-based numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn numbers<const N: usize>(path: &Path, line: usize, text: &str) -> Result<[f64; N]> {
    let fields: Vec<&str> = text.split_whitespace().collect();
    if fields.len() != N {
        return Err(parse_err(path, line, format!("expected {N} fields, found {}", fields.len())));
    }
    let mut out = [0.0f64; N];
    for (o, f) in out.iter_mut().zip(fields) {
        *o = f
            .parse()
            .map_err(|_| parse_err(path, line, format!("not a number: {f:?}")))?;
        if !o.is_finite() {
            return Err(parse_err(path, line, format!("not finite: {f:?}")));
        }
    }
    Ok(out)
}

/// `width height`, then one `a b theta quality` line per minutia.
pub fn template_to_string(t: &MinutiaeTemplate) -> String {
    let mut s = format!("{} {}\n", t.width, t.height);
    for m in t.minutiae() {
        // `{}` on f64 prints the shortest string that parses back exactly
        let _ = writeln!(s, "{} {} {} {}", m.a, m.b, m.theta, m.quality);
    }
    s
}

pub fn parse_template(text: &str, path: &Path) -> Result<MinutiaeTemplate> {
    let (minutiae, w, h) = parse_template_lines(text, path)?;
    Ok(MinutiaeTemplate::new(minutiae, w, h))
}

/// Minutiae in file order.
fn parse_template_lines(text: &str, path: &Path) -> Result<(Vec<Minutia>, u32, u32)> {
    let mut lines = content_lines(text);
    let (ln, header) = lines.next().ok_or_else(|| parse_err(path, 1, "missing header"))?;
    let [w, h] = numbers::<2>(path, ln, header)?;
    if w < 1.0 || h < 1.0 || w.fract() != 0.0 || h.fract() != 0.0 || w > u32::MAX as f64 || h > u32::MAX as f64 {
        return Err(parse_err(path, ln, "width and height must be positive integers"));
    }
    let mut minutiae = Vec::new();
    for (ln, l) in lines {
        let [a, b, theta, quality] = numbers::<4>(path, ln, l)?;
        minutiae.push(Minutia::new(a, b, theta, quality));
    }
    Ok((minutiae, w as u32, h as u32))
}

pub fn read_template(path: &Path) -> Result<MinutiaeTemplate> {
    parse_template(&read(path)?, path)
}

pub fn write_template(path: &Path, t: &MinutiaeTemplate) -> Result<()> {
    write(path, &template_to_string(t))
}

/// One hex-encoded descriptor per line, in template order.
pub fn descriptors_to_string(ds: &[Descriptor]) -> String {
    let mut s = String::new();
    for d in ds {
        s.push_str(&d.bits.to_hex());
        s.push('\n');
    }
    s
}

pub fn parse_descriptors(text: &str, len: usize, path: &Path) -> Result<Vec<Descriptor>> {
    content_lines(text)
        .map(|(ln, l)| {
            BitString::from_hex(l, len)
                .map(Descriptor::new)
                .ok_or_else(|| parse_err(path, ln, format!("not a {len}-bit hex descriptor")))
        })
        .collect()
}

pub fn read_descriptors(path: &Path, len: usize) -> Result<Vec<Descriptor>> {
    parse_descriptors(&read(path)?, len, path)
}

pub fn write_descriptors(path: &Path, ds: &[Descriptor]) -> Result<()> {
    write(path, &descriptors_to_string(ds))
}

/// Template plus descriptor sidecar; descriptor lines follow the template's
/// minutia lines.
pub fn read_described(template: &Path, descriptors: &Path, len: usize) -> Result<DescribedTemplate> {
    let (minutiae, w, h) = parse_template_lines(&read(template)?, template)?;
    let ds = read_descriptors(descriptors, len)?;
    if ds.len() != minutiae.len() {
        return Err(FormatError::Layout(format!(
            "{}: {} descriptors for {} minutiae",
            descriptors.display(),
            ds.len(),
            minutiae.len()
        )));
    }
    Ok(DescribedTemplate::new(minutiae.into_iter().zip(ds).collect(), w, h))
}

/// `dx dy rotation cx cy`: the transform taking the master finger into
/// this impression's frame.
pub fn transform_to_string(t: &RigidTransform) -> String {
    format!("{} {} {} {} {}\n", t.dx, t.dy, t.rotation, t.center.0, t.center.1)
}

pub fn read_transform(path: &Path) -> Result<RigidTransform> {
    let text = read(path)?;
    let (ln, l) = content_lines(&text)
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty transform file"))?;
    let [dx, dy, rot, cx, cy] = numbers::<5>(path, ln, l)?;
    Ok(RigidTransform::new(dx, dy, rot, (cx, cy)))
}

/// One impression of a dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct Impression {
    pub template: MinutiaeTemplate,
    /// Master-to-impression transform; identity without a sidecar.
    pub transform: RigidTransform,
    pub descriptors: Option<Vec<Descriptor>>,
}

impl Impression {
    pub fn described(&self) -> Option<DescribedTemplate> {
        self.descriptors.as_ref().map(|d| DescribedTemplate {
            template: self.template.clone(),
            descriptors: d.clone(),
        })
    }
}

/// Impressions grouped by finger, both in file-index order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub fingers: Vec<Vec<Impression>>,
}

impl Dataset {
    pub fn impressions_per_finger(&self) -> usize {
        self.fingers.iter().map(Vec::len).min().unwrap_or(0)
    }

    pub fn templates(&self) -> Vec<Vec<MinutiaeTemplate>> {
        self.fingers
            .iter()
            .map(|f| f.iter().map(|i| i.template.clone()).collect())
            .collect()
    }
}

pub fn impression_stem(finger: usize, imp: usize) -> String {
    format!("finger{finger}_imp{imp}")
}

fn parse_stem(name: &str) -> Option<(usize, usize)> {
    let rest = name.strip_prefix("finger")?.strip_suffix(".txt")?;
    let (f, i) = rest.split_once("_imp")?;
    let (f, i) = (f.parse().ok()?, i.parse().ok()?);
    (f >= 1 && i >= 1).then_some((f, i))
}

/// Writes `finger<I>_imp<J>.txt` plus `.xf` and, when present, `.desc`
/// sidecars; indices are 1-based.
pub fn write_dataset(dir: &Path, data: &Dataset) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| FormatError::Io {
        path: dir.to_owned(),
        source,
    })?;
    for (fi, finger) in data.fingers.iter().enumerate() {
        for (ii, imp) in finger.iter().enumerate() {
            let stem = dir.join(impression_stem(fi + 1, ii + 1));
            write_template(&stem.with_extension("txt"), &imp.template)?;
            write(&stem.with_extension("xf"), &transform_to_string(&imp.transform))?;
            if let Some(ds) = &imp.descriptors {
                write_descriptors(&stem.with_extension("desc"), ds)?;
            }
        }
    }
    Ok(())
}

/// Loads a dataset directory. Fingers and impressions must be numbered
/// contiguously from 1. Descriptor sidecars are read when `descriptor_len`
/// is given.
pub fn read_dataset(dir: &Path, descriptor_len: Option<usize>) -> Result<Dataset> {
    let entries = fs::read_dir(dir).map_err(|source| FormatError::Io {
        path: dir.to_owned(),
        source,
    })?;
    let mut found: Vec<(usize, usize)> = Vec::new();
    for e in entries {
        let e = e.map_err(|source| FormatError::Io {
            path: dir.to_owned(),
            source,
        })?;
        if let Some(key) = e.file_name().to_str().and_then(parse_stem) {
            found.push(key);
        }
    }
    if found.is_empty() {
        return Err(FormatError::Layout(format!("{}: no finger<I>_imp<J>.txt files", dir.display())));
    }
    found.sort_unstable();
    let fingers = found.iter().map(|k| k.0).max().unwrap_or(0);
    let mut data = Dataset::default();
    for f in 1..=fingers {
        let imps: Vec<usize> = found.iter().filter(|k| k.0 == f).map(|k| k.1).collect();
        if imps.is_empty() || imps.iter().enumerate().any(|(i, &j)| j != i + 1) {
            return Err(FormatError::Layout(format!(
                "{}: finger {f} impressions are not numbered 1..n",
                dir.display()
            )));
        }
        let mut finger = Vec::new();
        for j in imps {
            let stem = dir.join(impression_stem(f, j));
            let txt = stem.with_extension("txt");
            let xf = stem.with_extension("xf");
            let transform = if xf.exists() {
                read_transform(&xf)?
            } else {
                RigidTransform::IDENTITY
            };
            let (template, descriptors) = match descriptor_len {
                Some(len) => {
                    let d = read_described(&txt, &stem.with_extension("desc"), len)?;
                    (d.template, Some(d.descriptors))
                }
                None => (read_template(&txt)?, None),
            };
            finger.push(Impression {
                template,
                transform,
                descriptors,
            });
        }
        data.fingers.push(finger);
    }
    Ok(data)
}
