//! Chain reports: structured JSON, CSV and log-log plot data.

use std::io;
use std::str::FromStr;

use pucp_core::ucp::EstimateChain;
use serde::ser::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    Structured,
    Csv,
    Plotdata,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Structured => "json",
            Self::Csv => "csv",
            Self::Plotdata => "dat",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "structured" => Ok(Self::Structured),
            "csv" => Ok(Self::Csv),
            "plotdata" => Ok(Self::Plotdata),
            _ => Err(CliError::Config(format!("unknown report format {s}"))),
        }
    }
}

/// Decimal with 17 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Pretty JSON whose floats carry 17 significant digits.
struct Sig17<'a>(PrettyFormatter<'a>);

impl Formatter for Sig17<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt_num(value).as_bytes())
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Any serializable value as pretty JSON with 17-digit floats.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Sig17(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("in-memory serialization");
    out.push(b'\n');
    String::from_utf8(out).expect("JSON is UTF-8")
}

pub fn emit_report(chain: &EstimateChain, format: ReportFormat) -> String {
    match format {
        ReportFormat::Structured => to_json(chain),
        ReportFormat::Csv => csv_report(chain),
        ReportFormat::Plotdata => plot_report(chain),
    }
}

pub fn parse_structured(text: &str) -> Result<EstimateChain, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Config(format!("bad chain report: {e}")))
}

fn csv_report(chain: &EstimateChain) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["radius", "measured", "bound", "slack"]).expect("in-memory write");
    for ((r, m), b) in chain.radii.iter().zip(&chain.measured).zip(&chain.bounds) {
        w.write_record([fmt_num(*r), fmt_num(*m), fmt_num(*b), fmt_num(m - b)])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV is UTF-8")
}

/// Two gnuplot blocks of `(log10 r, log10 y)`, measured then bound; points
/// with a non-positive ordinate are omitted.
fn plot_report(chain: &EstimateChain) -> String {
    let mut out = String::new();
    for (k, (label, ys)) in [("measured", &chain.measured), ("bound", &chain.bounds)].into_iter().enumerate() {
        if k > 0 {
            out.push_str("\n\n");
        }
        out.push_str(&format!("# {} {label}\n# log10_radius log10_{label}\n", chain.branch.name()));
        for (r, y) in chain.radii.iter().zip(ys.iter()) {
            if *y > 0.0 && *r > 0.0 {
                out.push_str(&format!("{} {}\n", fmt_num(r.log10()), fmt_num(y.log10())));
            }
        }
    }
    out
}
