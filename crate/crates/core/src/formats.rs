//! On-disk formats: grid files (text and binary), reaction manifests, split
//! files, residual fields, and the delimited reports written by the CLI.
//!
//! Floats in text files use Rust's shortest round-trip exponent form, so a
//! write/read cycle reproduces every value bit for bit.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Manifest, ReactionRecord, SpeciesInfo};
use crate::error::{Result, XcError};
use crate::eval::{ReactionPrediction, ResidualPoint, SweepRow};
use crate::grid::{
    validate_grid, GridPoint, MolecularGrid, PointFeatures, DEFAULT_NORMALIZATION_TOLERANCE, FEATURE_NAMES, FEATURE_WIDTH,
};
use crate::split::SplitAssignment;
use crate::training::EpochRecord;
use crate::units::{hartree_to_kcal, kcal_to_hartree};

pub const GRID_MAGIC: &str = "xcu-grid";
pub const GRID_BINARY_MAGIC: &[u8; 8] = b"XCUGRID\0";
pub const GRID_VERSION: u32 = 1;
pub const MANIFEST_FORMAT: &str = "xcu-manifest";
pub const SPLIT_FORMAT: &str = "xcu-split";
pub const RESIDUAL_MAGIC: &str = "xcu-residual-field";
pub const FORMAT_VERSION: u32 = 1;

const ENHANCEMENT_NAMES: [&str; 3] = ["a1", "a2", "a3"];

fn check_token(kind: &str, id: &str) -> Result<()> {
    if id.is_empty() || id.chars().any(|c| c.is_whitespace() || c == ',' || c == '"' || c == '#') {
        return Err(XcError::InvalidData(format!(
            "{kind} `{id}` must be non-empty without whitespace, commas, quotes or '#'"
        )));
    }
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| XcError::format(path.display().to_string(), e.to_string()))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| XcError::format(parent.display().to_string(), e.to_string()))?;
        }
    }
    fs::write(path, bytes).map_err(|e| XcError::format(path.display().to_string(), e.to_string()))
}

// ---- grid, text form ----

pub fn grid_to_text(grid: &MolecularGrid) -> Result<String> {
    check_token("species id", &grid.species_id)?;
    let mut out = String::new();
    let _ = writeln!(out, "{GRID_MAGIC} {GRID_VERSION}");
    let _ = writeln!(out, "species {}", grid.species_id);
    let _ = writeln!(out, "electrons {:e} {:e}", grid.n_electrons_up, grid.n_electrons_down);
    let _ = writeln!(out, "points {}", grid.points.len());
    let mut columns = vec!["x", "y", "z", "weight"];
    columns.extend(FEATURE_NAMES);
    if grid.enhancement.is_some() {
        columns.extend(ENHANCEMENT_NAMES);
    }
    let _ = writeln!(out, "columns {}", columns.join(" "));
    for (i, p) in grid.points.iter().enumerate() {
        let mut row: Vec<f64> = p.position.to_vec();
        row.push(p.weight);
        row.extend(p.features.to_array());
        if let Some(f) = &grid.enhancement {
            row.extend(f[i]);
        }
        let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        let _ = writeln!(out, "{}", cells.join(" "));
    }
    Ok(out)
}

fn header_value<'a>(line: Option<(usize, &'a str)>, key: &str, path: &str) -> Result<Vec<&'a str>> {
    let (n, line) = line.ok_or_else(|| XcError::format(path, format!("missing `{key}` header")))?;
    let mut parts = line.split_whitespace();
    if parts.next() != Some(key) {
        return Err(XcError::format(path, format!("line {}: expected `{key}` header", n + 1)));
    }
    Ok(parts.collect())
}

fn parse_f64(s: &str, path: &str, line: usize) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| XcError::format(path, format!("line {line}: `{s}` is not a number")))
}

pub fn grid_from_text(text: &str, path: &str) -> Result<MolecularGrid> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let magic = header_value(lines.next(), GRID_MAGIC, path)?;
    if magic != [GRID_VERSION.to_string().as_str()] {
        return Err(XcError::format(path, format!("unsupported grid version {magic:?}")));
    }
    let species = header_value(lines.next(), "species", path)?;
    let [species_id] = species[..] else {
        return Err(XcError::format(path, "species header needs exactly one id"));
    };
    let electrons = header_value(lines.next(), "electrons", path)?;
    let [up, down] = electrons[..] else {
        return Err(XcError::format(path, "electrons header needs two counts"));
    };
    let (n_up, n_down) = (parse_f64(up, path, 3)?, parse_f64(down, path, 3)?);
    let count = header_value(lines.next(), "points", path)?;
    let n_points: usize = count
        .first()
        .and_then(|c| c.parse().ok())
        .ok_or_else(|| XcError::format(path, "points header needs a count"))?;
    let columns = header_value(lines.next(), "columns", path)?;
    let mut expected = vec!["x", "y", "z", "weight"];
    expected.extend(FEATURE_NAMES);
    let with_enh = columns.len() == expected.len() + 3;
    if with_enh {
        expected.extend(ENHANCEMENT_NAMES);
    }
    if columns != expected {
        return Err(XcError::format(
            path,
            format!("columns must be `{}`", expected.join(" ")),
        ));
    }
    let mut points = Vec::with_capacity(n_points);
    let mut enhancement = with_enh.then(|| Vec::with_capacity(n_points));
    for (n, line) in lines {
        let row = line
            .split_whitespace()
            .map(|s| parse_f64(s, path, n + 1))
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != expected.len() {
            return Err(XcError::format(
                path,
                format!("line {}: expected {} values, found {}", n + 1, expected.len(), row.len()),
            ));
        }
        let mut feats = [0.0; FEATURE_WIDTH];
        feats.copy_from_slice(&row[4..4 + FEATURE_WIDTH]);
        points.push(GridPoint {
            position: [row[0], row[1], row[2]],
            weight: row[3],
            features: PointFeatures::from_array(feats),
        });
        if let Some(e) = enhancement.as_mut() {
            let k = 4 + FEATURE_WIDTH;
            e.push([row[k], row[k + 1], row[k + 2]]);
        }
    }
    if points.len() != n_points {
        return Err(XcError::format(
            path,
            format!("header declares {n_points} points, found {}", points.len()),
        ));
    }
    Ok(MolecularGrid {
        species_id: species_id.to_owned(),
        points,
        n_electrons_up: n_up,
        n_electrons_down: n_down,
        enhancement,
    })
}

// ---- grid, binary form ----
//
// magic (8) | version u32 | id length u32 | id bytes | n_up f64 | n_down f64 |
// n_points u64 | has_enhancement u8 | rows of f64, little endian

pub fn grid_to_binary(grid: &MolecularGrid) -> Result<Vec<u8>> {
    check_token("species id", &grid.species_id)?;
    let width = 4 + FEATURE_WIDTH + if grid.enhancement.is_some() { 3 } else { 0 };
    let mut out = Vec::with_capacity(64 + grid.points.len() * width * 8);
    out.extend_from_slice(GRID_BINARY_MAGIC);
    out.extend_from_slice(&GRID_VERSION.to_le_bytes());
    out.extend_from_slice(&(grid.species_id.len() as u32).to_le_bytes());
    out.extend_from_slice(grid.species_id.as_bytes());
    out.extend_from_slice(&grid.n_electrons_up.to_le_bytes());
    out.extend_from_slice(&grid.n_electrons_down.to_le_bytes());
    out.extend_from_slice(&(grid.points.len() as u64).to_le_bytes());
    out.push(u8::from(grid.enhancement.is_some()));
    for (i, p) in grid.points.iter().enumerate() {
        let mut put = |v: f64| out.extend_from_slice(&v.to_le_bytes());
        p.position.iter().for_each(|&v| put(v));
        put(p.weight);
        p.features.to_array().iter().for_each(|&v| put(v));
        if let Some(f) = &grid.enhancement {
            f[i].iter().for_each(|&v| put(v));
        }
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
    path: &'a str,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| XcError::format(self.path, "truncated binary grid"))?;
        let s = &self.bytes[self.at..end];
        self.at = end;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn grid_from_binary(bytes: &[u8], path: &str) -> Result<MolecularGrid> {
    let mut r = Reader { bytes, at: 0, path };
    if r.take(8)? != GRID_BINARY_MAGIC {
        return Err(XcError::format(path, "not a binary grid file"));
    }
    let version = r.u32()?;
    if version != GRID_VERSION {
        return Err(XcError::format(path, format!("unsupported grid version {version}")));
    }
    let id_len = r.u32()? as usize;
    let species_id = std::str::from_utf8(r.take(id_len)?)
        .map_err(|_| XcError::format(path, "species id is not UTF-8"))?
        .to_owned();
    let n_up = r.f64()?;
    let n_down = r.f64()?;
    let n_points = r.u64()? as usize;
    let with_enh = match r.take(1)?[0] {
        0 => false,
        1 => true,
        b => return Err(XcError::format(path, format!("bad enhancement flag {b}"))),
    };
    let width = 4 + FEATURE_WIDTH + if with_enh { 3 } else { 0 };
    if bytes.len() - r.at != n_points.saturating_mul(width * 8) {
        return Err(XcError::format(path, "payload size does not match the point count"));
    }
    let mut points = Vec::with_capacity(n_points);
    let mut enhancement = with_enh.then(|| Vec::with_capacity(n_points));
    for _ in 0..n_points {
        let position = [r.f64()?, r.f64()?, r.f64()?];
        let weight = r.f64()?;
        let mut feats = [0.0; FEATURE_WIDTH];
        for v in &mut feats {
            *v = r.f64()?;
        }
        points.push(GridPoint {
            position,
            weight,
            features: PointFeatures::from_array(feats),
        });
        if let Some(e) = enhancement.as_mut() {
            e.push([r.f64()?, r.f64()?, r.f64()?]);
        }
    }
    Ok(MolecularGrid {
        species_id,
        points,
        n_electrons_up: n_up,
        n_electrons_down: n_down,
        enhancement,
    })
}

/// Writes text for `.grid` and binary for `.gridb`.
pub fn save_grid(path: &Path, grid: &MolecularGrid) -> Result<()> {
    if path.extension().is_some_and(|e| e == "gridb") {
        write_file(path, &grid_to_binary(grid)?)
    } else {
        write_file(path, grid_to_text(grid)?.as_bytes())
    }
}

pub fn load_grid(path: &Path) -> Result<MolecularGrid> {
    let name = path.display().to_string();
    if path.extension().is_some_and(|e| e == "gridb") {
        let bytes = fs::read(path).map_err(|e| XcError::format(&name, e.to_string()))?;
        grid_from_binary(&bytes, &name)
    } else {
        grid_from_text(&read_text(path)?, &name)
    }
}

// ---- manifest ----

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    format: String,
    version: u32,
    #[serde(default)]
    species: Vec<SpeciesEntry>,
    reactions: Vec<ReactionEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpeciesEntry {
    id: String,
    composition: BTreeMap<String, u32>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReactionEntry {
    id: String,
    /// Reference energy, kcal/mol.
    e_star: f64,
    terms: Vec<(String, i32)>,
}

pub fn manifest_to_toml(manifest: &Manifest) -> Result<String> {
    let file = ManifestFile {
        format: MANIFEST_FORMAT.into(),
        version: FORMAT_VERSION,
        species: manifest
            .species
            .iter()
            .map(|s| SpeciesEntry {
                id: s.id.clone(),
                composition: s.composition.clone(),
            })
            .collect(),
        reactions: manifest
            .reactions
            .iter()
            .map(|r| ReactionEntry {
                id: r.reaction_id.clone(),
                e_star: hartree_to_kcal(r.e_star),
                terms: r.terms.clone(),
            })
            .collect(),
    };
    toml::to_string(&file).map_err(|e| XcError::InvalidData(e.to_string()))
}

pub fn manifest_from_toml(text: &str, path: &str) -> Result<Manifest> {
    let file: ManifestFile = toml::from_str(text).map_err(|e| XcError::format(path, e.to_string()))?;
    if file.format != MANIFEST_FORMAT || file.version != FORMAT_VERSION {
        return Err(XcError::format(
            path,
            format!("expected {MANIFEST_FORMAT} version {FORMAT_VERSION}, found {} {}", file.format, file.version),
        ));
    }
    let manifest = Manifest {
        species: file
            .species
            .into_iter()
            .map(|s| SpeciesInfo {
                id: s.id,
                composition: s.composition,
            })
            .collect(),
        reactions: file
            .reactions
            .into_iter()
            .map(|r| ReactionRecord::new(r.id, r.terms, kcal_to_hartree(r.e_star)))
            .collect(),
    };
    manifest.check()?;
    Ok(manifest)
}

pub fn load_manifest(path: &Path) -> Result<Manifest> {
    manifest_from_toml(&read_text(path)?, &path.display().to_string())
}

pub const MANIFEST_FILE: &str = "manifest.toml";
pub const GRID_DIR: &str = "grids";

pub fn grid_path(dir: &Path, species: &str, binary: bool) -> PathBuf {
    dir.join(GRID_DIR).join(format!("{species}.{}", if binary { "gridb" } else { "grid" }))
}

/// Writes `manifest.toml` and one grid file per species under `grids/`.
pub fn save_dataset(dir: &Path, dataset: &Dataset, binary: bool) -> Result<()> {
    for r in &dataset.manifest.reactions {
        check_token("reaction id", &r.reaction_id)?;
    }
    write_file(&dir.join(MANIFEST_FILE), manifest_to_toml(&dataset.manifest)?.as_bytes())?;
    for (id, grid) in &dataset.grids {
        save_grid(&grid_path(dir, id, binary), grid)?;
    }
    Ok(())
}

/// Loads a dataset directory, preferring text grids over binary ones.
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let manifest = load_manifest(&dir.join(MANIFEST_FILE))?;
    let mut grids = Vec::new();
    for id in manifest.referenced_species() {
        let text = grid_path(dir, &id, false);
        let path = if text.exists() { text } else { grid_path(dir, &id, true) };
        if !path.exists() {
            return Err(XcError::MissingSpecies(id));
        }
        let grid = load_grid(&path)?;
        if grid.species_id != id {
            return Err(XcError::format(
                path.display().to_string(),
                format!("file holds species `{}`, expected `{id}`", grid.species_id),
            ));
        }
        validate_grid(&grid, DEFAULT_NORMALIZATION_TOLERANCE).into_result(&id)?;
        grids.push(grid);
    }
    Dataset::new(grids, manifest)
}

// ---- split ----

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SplitFile {
    format: String,
    version: u32,
    seed: u64,
    train: Vec<String>,
    validation: Vec<String>,
    test: Vec<String>,
}

pub fn split_to_toml(split: &SplitAssignment, seed: u64) -> Result<String> {
    let file = SplitFile {
        format: SPLIT_FORMAT.into(),
        version: FORMAT_VERSION,
        seed,
        train: split.train.clone(),
        validation: split.validation.clone(),
        test: split.test.clone(),
    };
    toml::to_string(&file).map_err(|e| XcError::InvalidData(e.to_string()))
}

pub fn split_from_toml(text: &str, path: &str) -> Result<(SplitAssignment, u64)> {
    let file: SplitFile = toml::from_str(text).map_err(|e| XcError::format(path, e.to_string()))?;
    if file.format != SPLIT_FORMAT || file.version != FORMAT_VERSION {
        return Err(XcError::format(path, "not a version 1 split file"));
    }
    Ok((
        SplitAssignment {
            train: file.train,
            validation: file.validation,
            test: file.test,
        },
        file.seed,
    ))
}

pub fn load_split(path: &Path) -> Result<SplitAssignment> {
    split_from_toml(&read_text(path)?, &path.display().to_string()).map(|(s, _)| s)
}

// ---- residual field ----

pub const RESIDUAL_COLUMNS: &str = "x y z log_abs_residual s_bar rho";

pub fn residual_field_to_text(species_id: &str, points: &[ResidualPoint]) -> Result<String> {
    check_token("species id", species_id)?;
    let mut out = String::new();
    let _ = writeln!(out, "# {RESIDUAL_MAGIC} {FORMAT_VERSION} species {species_id} points {}", points.len());
    let _ = writeln!(out, "{RESIDUAL_COLUMNS}");
    for p in points {
        let _ = writeln!(
            out,
            "{:e} {:e} {:e} {:e} {:e} {:e}",
            p.position[0], p.position[1], p.position[2], p.log_abs_residual, p.s_bar, p.rho
        );
    }
    Ok(out)
}

pub fn parse_residual_field(text: &str, path: &str) -> Result<(String, Vec<ResidualPoint>)> {
    let mut lines = text.lines().enumerate();
    let (_, head) = lines.next().ok_or_else(|| XcError::format(path, "empty residual file"))?;
    let h: Vec<&str> = head.split_whitespace().collect();
    let version = FORMAT_VERSION.to_string();
    let ["#", RESIDUAL_MAGIC, v, "species", species, "points", n] = h[..] else {
        return Err(XcError::format(path, "malformed residual-field header"));
    };
    if v != version {
        return Err(XcError::format(path, format!("unsupported residual-field version {v}")));
    }
    let n: usize = n.parse().map_err(|_| XcError::format(path, "bad point count"))?;
    match lines.next() {
        Some((_, cols)) if cols.split_whitespace().eq(RESIDUAL_COLUMNS.split_whitespace()) => {}
        _ => return Err(XcError::format(path, format!("second line must be `{RESIDUAL_COLUMNS}`"))),
    }
    let mut points = Vec::with_capacity(n);
    for (i, line) in lines.filter(|(_, l)| !l.trim().is_empty()) {
        let v = line
            .split_whitespace()
            .map(|s| parse_f64(s, path, i + 1))
            .collect::<Result<Vec<f64>>>()?;
        let [x, y, z, l, s, rho] = v[..] else {
            return Err(XcError::format(path, format!("line {}: expected 6 values", i + 1)));
        };
        points.push(ResidualPoint {
            position: [x, y, z],
            log_abs_residual: l,
            s_bar: s,
            rho,
        });
    }
    if points.len() != n {
        return Err(XcError::format(path, format!("header declares {n} points, found {}", points.len())));
    }
    Ok((species.to_owned(), points))
}

// ---- delimited reports ----

pub const PREDICTION_HEADER: &str = "reaction_id,e_conv_ha,e_ru_ha,sigma_ha,e_star_ha,error_ha,\
e_conv_kcal,e_ru_kcal,sigma_kcal,e_star_kcal,error_kcal";

pub fn predictions_csv(predictions: &[ReactionPrediction]) -> String {
    let mut out = String::from(PREDICTION_HEADER);
    out.push('\n');
    for p in predictions {
        let ha = [p.e_conv, p.e_ru, p.sigma, p.e_star, p.error()];
        let cells: Vec<String> = ha
            .iter()
            .chain(ha.map(hartree_to_kcal).iter())
            .map(|v| format!("{v:e}"))
            .collect();
        let _ = writeln!(out, "{},{}", p.reaction_id, cells.join(","));
    }
    out
}

pub const SWEEP_HEADER: &str = "k1,k2,rmse_kcal";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{:e},{:e},{:e}", r.k1, r.k2, r.rmse);
    }
    out
}

pub fn parse_sweep_csv(text: &str, path: &str) -> Result<Vec<SweepRow>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    if lines.next() != Some(SWEEP_HEADER) {
        return Err(XcError::format(path, format!("header must be `{SWEEP_HEADER}`")));
    }
    lines
        .enumerate()
        .map(|(i, l)| {
            let v = l
                .split(',')
                .map(|s| parse_f64(s.trim(), path, i + 2))
                .collect::<Result<Vec<f64>>>()?;
            match v[..] {
                [k1, k2, rmse] => Ok(SweepRow { k1, k2, rmse }),
                _ => Err(XcError::format(path, format!("line {}: expected 3 values", i + 2))),
            }
        })
        .collect()
}

pub const LOG_HEADER: &str = "epoch\tlearning_rate\ttrain_loss\tval_loss\tval_rmse_kcal\telapsed_s";

pub fn log_line(r: &EpochRecord) -> String {
    format!(
        "{}\t{:e}\t{:e}\t{:e}\t{:e}\t{:.3}",
        r.epoch, r.learning_rate, r.train_loss, r.val_loss, r.val_rmse, r.elapsed_s
    )
}

pub fn save_text(path: &Path, text: &str) -> Result<()> {
    write_file(path, text.as_bytes())
}
