//! JSON and CSV encodings.
//!
//! Floats are written with 17 significant digits (`{:.16e}`), objects keep a
//! fixed field order and output is compact, so equal inputs give byte-equal
//! files. Every JSON document carries `"format": 1`.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;

use crate::kernel::{
    EquationResidual, KernelTable, LatticeWindow, LimitRow, ResidualReport, Seed, SeedCase,
};
use crate::oracle::NullspaceResult;
use crate::qspecial::DeformationParameter;
use crate::repr::{ReflectionConstruction, ReflectionMap, Recurrence, TripleParams};
use crate::{Complex64, Error, LatticePoint, Result};

pub const FORMAT_VERSION: u32 = 1;

/// Compact formatter with fixed 17-significant-digit floats. Non-finite
/// values become `null`.
#[derive(Debug, Clone, Copy, Default)]
pub struct FixedFloatFormatter;

impl Formatter for FixedFloatFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Serializes `value` as one line of JSON followed by a newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloatFormatter);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
}

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexJson {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexJson {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<ComplexJson> for Complex64 {
    fn from(z: ComplexJson) -> Self {
        Complex64::new(z.re, z.im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeformationJson {
    pub mode: String,
    pub q: ComplexJson,
    pub log_q: ComplexJson,
}

impl From<&DeformationParameter> for DeformationJson {
    fn from(dp: &DeformationParameter) -> Self {
        Self {
            mode: if dp.is_classical() { "classical" } else { "quantum" }.into(),
            q: dp.q().into(),
            log_q: dp.log_q().into(),
        }
    }
}

impl DeformationJson {
    pub fn to_parameter(&self) -> Result<DeformationParameter> {
        match self.mode.as_str() {
            "classical" => Ok(DeformationParameter::classical()),
            "quantum" => DeformationParameter::with_log(self.q.into(), self.log_q.into()),
            other => Err(Error::Parse(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleJson {
    pub s: ComplexJson,
    pub eps: u8,
}

fn triple_json(triple: &TripleParams) -> Vec<ModuleJson> {
    triple.modules.iter().map(|mp| ModuleJson { s: mp.s.into(), eps: mp.epsilon }).collect()
}

fn triple_from_json(modules: &[ModuleJson]) -> Result<TripleParams> {
    let [a, b, c] = modules else {
        return Err(Error::Parse(format!("expected 3 modules, found {}", modules.len())));
    };
    TripleParams::from_parts([a.s.into(), b.s.into(), c.s.into()], [a.eps, b.eps, c.eps])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntryJson {
    pub n: i32,
    pub m: i32,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedJson {
    pub case: String,
    pub point: [i32; 2],
    pub value: ComplexJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelTableJson {
    pub format: u32,
    pub deformation: DeformationJson,
    pub triple: Vec<ModuleJson>,
    #[serde(rename = "W")]
    pub w: u32,
    pub seed: SeedJson,
    pub trivial: bool,
    pub reducible: bool,
    pub omitted: Vec<[i32; 2]>,
    pub entries: Vec<EntryJson>,
}

fn entries(values: &BTreeMap<LatticePoint, Complex64>) -> Vec<EntryJson> {
    values.iter().map(|(&(n, m), v)| EntryJson { n, m, re: v.re, im: v.im }).collect()
}

impl From<&KernelTable> for KernelTableJson {
    fn from(t: &KernelTable) -> Self {
        Self {
            format: FORMAT_VERSION,
            deformation: (&t.dp).into(),
            triple: triple_json(&t.triple),
            w: t.window.radius(),
            seed: SeedJson {
                case: t.seed.case.id().into(),
                point: [t.seed.point.0, t.seed.point.1],
                value: t.seed.value.into(),
            },
            trivial: t.trivial,
            reducible: t.reducible,
            omitted: t.omitted.iter().map(|&(n, m)| [n, m]).collect(),
            entries: entries(&t.values),
        }
    }
}

impl KernelTableJson {
    pub fn to_table(&self) -> Result<KernelTable> {
        if self.format != FORMAT_VERSION {
            return Err(Error::Parse(format!("unsupported format version {}", self.format)));
        }
        let triple = triple_from_json(&self.triple)?;
        let window = LatticeWindow::for_triple(self.w, &triple)?;
        let case = SeedCase::from_id(&self.seed.case)
            .ok_or_else(|| Error::Parse(format!("unknown seed case {:?}", self.seed.case)))?;
        let mut values = BTreeMap::new();
        for e in &self.entries {
            if !window.on_lattice((e.n, e.m)) {
                return Err(Error::Parity((e.n, e.m)));
            }
            values.insert((e.n, e.m), Complex64::new(e.re, e.im));
        }
        Ok(KernelTable {
            triple,
            dp: self.deformation.to_parameter()?,
            window,
            seed: Seed {
                case,
                point: (self.seed.point[0], self.seed.point[1]),
                value: self.seed.value.into(),
            },
            trivial: self.trivial,
            reducible: self.reducible,
            values,
            omitted: self.omitted.iter().map(|p| (p[0], p[1])).collect(),
        })
    }
}

pub fn table_to_json(table: &KernelTable) -> Result<String> {
    to_json(&KernelTableJson::from(table))
}

pub fn table_from_json(text: &str) -> Result<KernelTable> {
    serde_json::from_str::<KernelTableJson>(text)?.to_table()
}

/// `n,m,re,im` rows sorted by `(n, m)`.
pub fn values_to_csv(values: &BTreeMap<LatticePoint, Complex64>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n", "m", "re", "im"])?;
    for (&(n, m), v) in values {
        w.write_record([n.to_string(), m.to_string(), format_float(v.re), format_float(v.im)])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

pub fn values_from_csv(text: &str) -> Result<BTreeMap<LatticePoint, Complex64>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["n", "m", "re", "im"] {
        return Err(Error::Parse(format!("expected header n,m,re,im, found {:?}", headers)));
    }
    let mut out = BTreeMap::new();
    for record in r.records() {
        let record = record?;
        let field = |i: usize| record.get(i).unwrap_or("").trim();
        let int = |i: usize| field(i).parse::<i32>().map_err(|e| Error::Parse(format!("{}: {e}", field(i))));
        let float = |i: usize| field(i).parse::<f64>().map_err(|e| Error::Parse(format!("{}: {e}", field(i))));
        out.insert((int(0)?, int(1)?), Complex64::new(float(2)?, float(3)?));
    }
    Ok(out)
}

/// Contents of a table file: a full JSON table or bare CSV values.
#[derive(Debug, Clone, PartialEq)]
pub enum TableFile {
    Json(KernelTable),
    Csv(BTreeMap<LatticePoint, Complex64>),
}

pub fn parse_table_file(text: &str) -> Result<TableFile> {
    if text.trim_start().starts_with('{') {
        Ok(TableFile::Json(table_from_json(text)?))
    } else {
        Ok(TableFile::Csv(values_from_csv(text)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualJson {
    pub equation: String,
    pub max_abs: f64,
    pub mean_abs: f64,
    pub normalization: f64,
    pub worst: Option<[i32; 2]>,
    pub evaluated: usize,
}

impl From<&EquationResidual> for ResidualJson {
    fn from(e: &EquationResidual) -> Self {
        Self {
            equation: e.equation.id().into(),
            max_abs: e.max_abs,
            mean_abs: e.mean_abs,
            normalization: e.normalization,
            worst: e.worst.map(|(n, m)| [n, m]),
            evaluated: e.evaluated,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReportJson {
    pub format: u32,
    pub tolerance: f64,
    pub passed: bool,
    pub residuals: Vec<ResidualJson>,
}

pub fn report_to_json(report: &ResidualReport, tolerance: f64) -> Result<String> {
    to_json(&ResidualReportJson {
        format: FORMAT_VERSION,
        tolerance,
        passed: report.passes(tolerance),
        residuals: report.entries.iter().map(ResidualJson::from).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisEntryJson {
    /// Index of the basis vector.
    pub k: usize,
    pub n: i32,
    pub m: i32,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullspaceJson {
    pub format: u32,
    pub singular_values: Vec<f64>,
    pub nullity: usize,
    pub threshold: f64,
    /// Deviation of the first basis vector from the recursive table.
    pub deviation: Option<f64>,
    pub basis: Vec<BasisEntryJson>,
}

pub fn nullspace_to_json(result: &NullspaceResult, deviation: Option<f64>) -> Result<String> {
    let basis = result
        .basis
        .iter()
        .enumerate()
        .flat_map(|(k, v)| v.iter().map(move |(&(n, m), z)| BasisEntryJson { k, n, m, re: z.re, im: z.im }))
        .collect();
    to_json(&NullspaceJson {
        format: FORMAT_VERSION,
        singular_values: result.singular_values.clone(),
        nullity: result.nullity,
        threshold: result.threshold,
        deviation,
        basis,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightEntryJson {
    pub n: i32,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectionJson {
    pub format: u32,
    pub deformation: DeformationJson,
    pub s: ComplexJson,
    pub epsilon: u8,
    pub construction: String,
    pub anchor: i32,
    pub unitarity_residual: f64,
    /// Anchored deviation from the recurrence construction, when a second
    /// construction was run.
    pub construction_deviation: Option<f64>,
    pub entries: Vec<WeightEntryJson>,
}

pub fn construction_id(c: ReflectionConstruction) -> &'static str {
    match c {
        ReflectionConstruction::PhiRatio => "phi-ratio",
        ReflectionConstruction::Recurrence(Recurrence::E) => "recurrence-e",
        ReflectionConstruction::Recurrence(Recurrence::F) => "recurrence-f",
    }
}

pub fn reflection_to_json(map: &ReflectionMap, unitarity: f64, construction_deviation: Option<f64>) -> Result<String> {
    to_json(&ReflectionJson {
        format: FORMAT_VERSION,
        deformation: (&map.dp).into(),
        s: map.source.s.into(),
        epsilon: map.source.epsilon,
        construction: construction_id(map.construction).into(),
        anchor: map.anchor,
        unitarity_residual: unitarity,
        construction_deviation,
        entries: map.coefficients.iter().map(|(&n, z)| WeightEntryJson { n, re: z.re, im: z.im }).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitRowJson {
    pub j: i32,
    pub q: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitJson {
    pub format: u32,
    pub triple: Vec<ModuleJson>,
    #[serde(rename = "W")]
    pub w: u32,
    pub monotone: bool,
    pub rows: Vec<LimitRowJson>,
}

pub fn limit_to_json(triple: &TripleParams, w: u32, rows: &[LimitRow], monotone: bool) -> Result<String> {
    to_json(&LimitJson {
        format: FORMAT_VERSION,
        triple: triple_json(triple),
        w,
        monotone,
        rows: rows.iter().map(|r| LimitRowJson { j: r.j, q: r.q, deviation: r.deviation }).collect(),
    })
}

pub fn limit_to_csv(rows: &[LimitRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["j", "q", "deviation"])?;
    for r in rows {
        w.write_record([r.j.to_string(), format_float(r.q), format_float(r.deviation)])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{build_kernel, residuals};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sample() -> KernelTable {
        let dp = DeformationParameter::quantum(c(0.5, 0.1)).unwrap();
        let t = TripleParams::from_parts([c(2.1, 0.0), c(1.3, 0.5), c(0.7, 0.0)], [1, 1, 0]).unwrap();
        build_kernel(&dp, &t, 8, c(1.0, 0.0)).unwrap()
    }

    #[test]
    fn floats_have_seventeen_digits() {
        assert_eq!(to_json(&vec![0.1f64, -2.5, 0.0]).unwrap(), "[1.0000000000000001e-1,-2.5000000000000000e0,0.0000000000000000e0]\n");
        assert_eq!(to_json(&f64::INFINITY).unwrap(), "null\n");
        let back: Vec<f64> = serde_json::from_str("[1.0000000000000001e-1]").unwrap();
        assert_eq!(back, vec![0.1]);
    }

    #[test]
    fn table_json_round_trip() {
        let table = sample();
        let text = table_to_json(&table).unwrap();
        assert!(text.starts_with("{\"format\":1,"));
        let back = table_from_json(&text).unwrap();
        assert_eq!(back, table);
        assert_eq!(table_to_json(&back).unwrap(), text);
    }

    #[test]
    fn table_csv_round_trip() {
        let table = sample();
        let text = values_to_csv(&table.values).unwrap();
        assert!(text.starts_with("n,m,re,im\n"));
        let back = values_from_csv(&text).unwrap();
        assert_eq!(back, table.values);
        assert!(matches!(parse_table_file(&text).unwrap(), TableFile::Csv(_)));
        assert!(values_from_csv("a,b\n1,2\n").is_err());
    }

    #[test]
    fn report_and_nullspace_json() {
        let table = sample();
        let report = residuals(&table.dp, &table.triple, &table).unwrap();
        let text = report_to_json(&report, 1e-9).unwrap();
        let parsed: ResidualReportJson = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed.residuals.len(), 4);
        assert_eq!(parsed.residuals[0].equation, "symmetry");

        let ns = NullspaceResult {
            singular_values: vec![2.0, 1e-14],
            nullity: 1,
            threshold: 1e-8,
            basis: vec![[((0, 0), c(1.0, 0.0))].into_iter().collect()],
        };
        let text = nullspace_to_json(&ns, Some(1e-12)).unwrap();
        let parsed: NullspaceJson = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed.basis, vec![BasisEntryJson { k: 0, n: 0, m: 0, re: 1.0, im: 0.0 }]);
    }

    #[test]
    fn classical_mode_round_trips() {
        let dp = DeformationParameter::classical();
        let json = DeformationJson::from(&dp);
        assert_eq!(json.to_parameter().unwrap(), dp);
        let bad = DeformationJson { mode: "other".into(), ..json };
        assert!(bad.to_parameter().is_err());
    }
}
