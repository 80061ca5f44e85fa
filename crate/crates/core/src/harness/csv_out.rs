//! CSV tables written by the runners. Each file starts with a `# unida <table> v<N>`
//! comment line followed by a fixed header. Floats use 17 significant digits so
//! every table round-trips exactly.

use std::io::{Read, Write};

use super::sweeps::{EvalRow, NoiseRow};
use super::toy::{ToyArm, ToyOutcome, ToyPoint};
use super::train::StepLog;
use crate::error::{Error, Result};
use crate::synthdata::format_f64;
use crate::weighting::UncertaintyKind;

pub const SCHEMA_VERSION: u32 = 1;

pub const STEP_HEADER: &[&str] = &["step", "L_s", "L_adv", "L_ssl", "noise_src", "noise_tgt", "noise_pool"];
pub const EVAL_HEADER: &[&str] = &[
    "config_hash",
    "seed",
    "spcr",
    "flip_rate",
    "alpha",
    "acc_common",
    "acc_private",
    "h_score",
    "misclass_sp",
    "arm",
    "tp_prop",
    "noise_tgt",
];
pub const NOISE_HEADER: &[&str] = &["config_hash", "seed", "spcr", "flip_rate", "kind", "mean_noise"];
pub const TOY_POINT_HEADER: &[&str] = &["seed", "spcr", "arm", "domain", "label", "x0", "x1", "z0", "z1"];
pub const TOY_SUMMARY_HEADER: &[&str] = &["seed", "spcr", "alignment_sup", "alignment_ssl"];

/// Which table a header belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Table {
    Steps,
    Eval,
    Noise,
    ToyPoints,
    ToySummary,
}

impl Table {
    pub const ALL: [Table; 5] = [Table::Steps, Table::Eval, Table::Noise, Table::ToyPoints, Table::ToySummary];

    pub fn name(self) -> &'static str {
        match self {
            Table::Steps => "steps",
            Table::Eval => "eval",
            Table::Noise => "noise",
            Table::ToyPoints => "toy_points",
            Table::ToySummary => "toy_summary",
        }
    }

    pub fn header(self) -> &'static [&'static str] {
        match self {
            Table::Steps => STEP_HEADER,
            Table::Eval => EVAL_HEADER,
            Table::Noise => NOISE_HEADER,
            Table::ToyPoints => TOY_POINT_HEADER,
            Table::ToySummary => TOY_SUMMARY_HEADER,
        }
    }

    /// The table whose header matches exactly.
    pub fn detect(header: &[String]) -> Option<Table> {
        Table::ALL.into_iter().find(|t| t.header() == header)
    }
}

fn write_table<W: Write>(mut out: W, table: Table, rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    writeln!(out, "# unida {} v{SCHEMA_VERSION}", table.name())?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(table.header())?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

/// Raw header and records of a CSV table, comment lines skipped.
pub fn read_raw<R: Read>(input: R) -> Result<(Vec<String>, Vec<csv::StringRecord>)> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let records = rdr.records().collect::<std::result::Result<Vec<_>, _>>()?;
    Ok((header, records))
}

/// Checks `header` against `table` and names the first offending column.
pub fn check_header(header: &[String], table: Table) -> Result<()> {
    let want = table.header();
    for (i, w) in want.iter().enumerate() {
        match header.get(i) {
            Some(h) if h == w => {}
            Some(h) => {
                return Err(Error::Schema(format!(
                    "{} table: column {} should be `{w}`, found `{h}`",
                    table.name(),
                    i + 1
                )))
            }
            None => {
                return Err(Error::Schema(format!(
                    "{} table: missing column {} `{w}`",
                    table.name(),
                    i + 1
                )))
            }
        }
    }
    if header.len() > want.len() {
        return Err(Error::Schema(format!(
            "{} table: unexpected column {} `{}`",
            table.name(),
            want.len() + 1,
            header[want.len()]
        )));
    }
    Ok(())
}

fn read_table<R: Read>(input: R, table: Table) -> Result<Vec<csv::StringRecord>> {
    let (header, records) = read_raw(input)?;
    check_header(&header, table)?;
    Ok(records)
}

/// Typed field access with row/column diagnostics.
pub struct Fields<'a> {
    table: Table,
    line: usize,
    rec: &'a csv::StringRecord,
}

impl<'a> Fields<'a> {
    pub fn new(table: Table, line: usize, rec: &'a csv::StringRecord) -> Self {
        Self { table, line, rec }
    }

    fn bad(&self, col: usize, what: &str) -> Error {
        Error::Schema(format!(
            "{} table, data row {}: column `{}` {what}",
            self.table.name(),
            self.line + 1,
            self.table.header()[col]
        ))
    }

    pub fn str(&self, col: usize) -> Result<&'a str> {
        self.rec.get(col).ok_or_else(|| self.bad(col, "is missing"))
    }

    pub fn f64(&self, col: usize) -> Result<f64> {
        self.str(col)?.trim().parse().map_err(|_| self.bad(col, "is not a number"))
    }

    pub fn opt_f64(&self, col: usize) -> Result<Option<f64>> {
        let s = self.str(col)?.trim();
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|_| self.bad(col, "is not a number"))
        }
    }

    pub fn u64(&self, col: usize) -> Result<u64> {
        self.str(col)?.trim().parse().map_err(|_| self.bad(col, "is not an unsigned integer"))
    }
}

pub fn write_step_log<W: Write>(out: W, log: &[StepLog]) -> Result<()> {
    write_table(
        out,
        Table::Steps,
        log.iter().map(|s| {
            vec![
                s.step.to_string(),
                format_f64(s.l_s),
                format_f64(s.l_adv),
                format_f64(s.l_ssl),
                format_f64(s.noise_src),
                format_f64(s.noise_tgt),
                format_f64(s.noise_pool),
            ]
        }),
    )
}

pub fn read_step_log<R: Read>(input: R) -> Result<Vec<StepLog>> {
    read_table(input, Table::Steps)?
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let f = Fields::new(Table::Steps, i, r);
            Ok(StepLog {
                step: f.u64(0)? as usize,
                l_s: f.f64(1)?,
                l_adv: f.f64(2)?,
                l_ssl: f.f64(3)?,
                noise_src: f.f64(4)?,
                noise_tgt: f.f64(5)?,
                noise_pool: f.f64(6)?,
            })
        })
        .collect()
}

/// An absent target-private accuracy is written as an empty field.
pub fn write_eval_rows<W: Write>(out: W, rows: &[EvalRow]) -> Result<()> {
    write_table(
        out,
        Table::Eval,
        rows.iter().map(|r| {
            vec![
                r.config_hash.clone(),
                r.seed.to_string(),
                format_f64(r.spcr),
                format_f64(r.flip_rate),
                format_f64(r.alpha),
                format_f64(r.acc_common),
                r.acc_private.map(format_f64).unwrap_or_default(),
                format_f64(r.h_score),
                format_f64(r.misclass_sp),
                r.arm.clone(),
                format_f64(r.tp_prop),
                format_f64(r.noise_tgt),
            ]
        }),
    )
}

pub fn read_eval_rows<R: Read>(input: R) -> Result<Vec<EvalRow>> {
    read_table(input, Table::Eval)?
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let f = Fields::new(Table::Eval, i, r);
            Ok(EvalRow {
                config_hash: f.str(0)?.to_string(),
                seed: f.u64(1)?,
                spcr: f.f64(2)?,
                flip_rate: f.f64(3)?,
                alpha: f.f64(4)?,
                acc_common: f.f64(5)?,
                acc_private: f.opt_f64(6)?,
                h_score: f.f64(7)?,
                misclass_sp: f.f64(8)?,
                arm: f.str(9)?.to_string(),
                tp_prop: f.f64(10)?,
                noise_tgt: f.f64(11)?,
            })
        })
        .collect()
}

pub fn write_noise_rows<W: Write>(out: W, rows: &[NoiseRow]) -> Result<()> {
    write_table(
        out,
        Table::Noise,
        rows.iter().map(|r| {
            vec![
                r.config_hash.clone(),
                r.seed.to_string(),
                format_f64(r.spcr),
                format_f64(r.flip_rate),
                r.kind.as_str().to_string(),
                format_f64(r.mean_noise),
            ]
        }),
    )
}

pub fn read_noise_rows<R: Read>(input: R) -> Result<Vec<NoiseRow>> {
    read_table(input, Table::Noise)?
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let f = Fields::new(Table::Noise, i, r);
            let name = f.str(4)?;
            let kind = UncertaintyKind::ALL
                .into_iter()
                .find(|k| k.as_str() == name)
                .ok_or_else(|| f.bad(4, "is not an uncertainty kind"))?;
            Ok(NoiseRow {
                config_hash: f.str(0)?.to_string(),
                seed: f.u64(1)?,
                spcr: f.f64(2)?,
                flip_rate: f.f64(3)?,
                kind,
                mean_noise: f.f64(5)?,
            })
        })
        .collect()
}

fn arm_name(arm: Option<ToyArm>) -> &'static str {
    arm.map_or("raw", ToyArm::as_str)
}

/// Raw and learned-feature coordinates of every toy run.
pub fn write_toy_points<W: Write>(out: W, outcomes: &[ToyOutcome]) -> Result<()> {
    write_table(
        out,
        Table::ToyPoints,
        outcomes.iter().flat_map(|o| {
            o.points.iter().map(move |p| {
                vec![
                    o.seed.to_string(),
                    format_f64(o.spcr),
                    arm_name(p.arm).to_string(),
                    p.domain.to_string(),
                    p.label.to_string(),
                    format_f64(p.x[0]),
                    format_f64(p.x[1]),
                    format_f64(p.z[0]),
                    format_f64(p.z[1]),
                ]
            })
        }),
    )
}

/// One toy-points row as read back.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyPointRow {
    pub seed: u64,
    pub spcr: f64,
    pub point: ToyPoint,
}

pub fn read_toy_points<R: Read>(input: R) -> Result<Vec<ToyPointRow>> {
    read_table(input, Table::ToyPoints)?
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let f = Fields::new(Table::ToyPoints, i, r);
            let arm = match f.str(2)? {
                "raw" => None,
                "sup" => Some(ToyArm::Supervised),
                "sup_ssl" => Some(ToyArm::SupervisedSsl),
                _ => return Err(f.bad(2, "is not one of raw, sup, sup_ssl")),
            };
            let domain = match f.str(3)? {
                "source" => "source",
                "target" => "target",
                _ => return Err(f.bad(3, "is not source or target")),
            };
            Ok(ToyPointRow {
                seed: f.u64(0)?,
                spcr: f.f64(1)?,
                point: ToyPoint {
                    arm,
                    domain,
                    label: f.u64(4)? as usize,
                    x: [f.f64(5)?, f.f64(6)?],
                    z: [f.f64(7)?, f.f64(8)?],
                },
            })
        })
        .collect()
}

pub fn write_toy_summary<W: Write>(out: W, outcomes: &[ToyOutcome]) -> Result<()> {
    write_table(
        out,
        Table::ToySummary,
        outcomes.iter().map(|o| {
            vec![
                o.seed.to_string(),
                format_f64(o.spcr),
                format_f64(o.alignment_sup),
                format_f64(o.alignment_ssl),
            ]
        }),
    )
}
